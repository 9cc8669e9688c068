#pragma once

#include "groklens/config.hpp"
#include "groklens/csv.hpp"
#include "groklens/datasets.hpp"
#include "groklens/error.hpp"
#include "groklens/experiments.hpp"
#include "groklens/manifest.hpp"
#include "groklens/nn.hpp"
#include "groklens/optim.hpp"
#include "groklens/plot.hpp"
#include "groklens/rng.hpp"
#include "groklens/runner.hpp"
#include "groklens/spectral.hpp"
