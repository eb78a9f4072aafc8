#pragma once

#include "dac/rng.hpp"
#include "dac/parallel.hpp"
#include "dac/lattice.hpp"
#include "dac/union_find.hpp"
#include "dac/percolation.hpp"
#include "dac/coloring.hpp"
#include "dac/stats.hpp"
#include "dac/theory.hpp"
#include "dac/harness.hpp"
#include "dac/report.hpp"
