// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "jrc/types.hpp"
#include "jrc/fft.hpp"
#include "jrc/sigcore.hpp"
#include "jrc/channel.hpp"
#include "jrc/pmcw.hpp"
#include "jrc/ofdma.hpp"
#include "jrc/estim.hpp"
#include "jrc/perf.hpp"
#include "jrc/alloc.hpp"
#include "jrc/io.hpp"
#include "jrc/config.hpp"
#include "jrc/experiment.hpp"
