#pragma once

#include "adwin/common.hpp"
#include "adwin/fft.hpp"
#include "adwin/rng.hpp"
#include "adwin/grid.hpp"
#include "adwin/taper.hpp"
#include "adwin/synth.hpp"
#include "adwin/channel.hpp"
#include "adwin/rx.hpp"
#include "adwin/ul_estimation.hpp"
#include "adwin/capacity.hpp"
#include "adwin/txopt.hpp"
#include "adwin/rxopt.hpp"
#include "adwin/oracle.hpp"
#include "adwin/psd.hpp"
#include "adwin/stats.hpp"
#include "adwin/montecarlo.hpp"
#include "adwin/results.hpp"
#include "adwin/scenario_file.hpp"
