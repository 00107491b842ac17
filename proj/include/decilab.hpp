#pragma once

#include "decilab/quadrature.hpp"
#include "decilab/window.hpp"
#include "decilab/kernels.hpp"
#include "decilab/simulate.hpp"
#include "decilab/moments.hpp"
#include "decilab/specdens.hpp"
#include "decilab/montecarlo.hpp"
#include "decilab/config.hpp"
#include "decilab/cli.hpp"
