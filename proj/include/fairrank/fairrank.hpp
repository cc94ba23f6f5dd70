#pragma once

// Umbrella header for the fairrank library.

#include "fairrank/csv.hpp"
#include "fairrank/dataset.hpp"
#include "fairrank/error.hpp"
#include "fairrank/experiments.hpp"
#include "fairrank/fairness.hpp"
#include "fairrank/matrix.hpp"
#include "fairrank/metrics.hpp"
#include "fairrank/nn.hpp"
#include "fairrank/records.hpp"
#include "fairrank/report.hpp"
#include "fairrank/rng.hpp"
#include "fairrank/selection.hpp"
#include "fairrank/synthetic.hpp"
#include "fairrank/training.hpp"
