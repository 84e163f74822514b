#pragma once

#include "streamcode/bitbuffer.hpp"
#include "streamcode/channel.hpp"
#include "streamcode/coder_ac.hpp"
#include "streamcode/coder_core.hpp"
#include "streamcode/coder_deflate.hpp"
#include "streamcode/coder_rans.hpp"
#include "streamcode/codec.hpp"
#include "streamcode/corpus.hpp"
#include "streamcode/errors.hpp"
#include "streamcode/exact.hpp"
#include "streamcode/experiment.hpp"
#include "streamcode/pmf.hpp"
#include "streamcode/predictor.hpp"
#include "streamcode/trace.hpp"
