#pragma once

// Everything in one include.
#include "itd/core.hpp"
#include "itd/random.hpp"
#include "itd/parallel.hpp"
#include "itd/lp.hpp"
#include "itd/transport.hpp"
#include "itd/kernel_metric.hpp"
#include "itd/selection.hpp"
#include "itd/lattice.hpp"
#include "itd/risk.hpp"
#include "itd/markets.hpp"
#include "itd/gmm.hpp"
#include "itd/io.hpp"
#include "itd/gmm_data.hpp"
#include "itd/experiments.hpp"
