#pragma once

#include "chiarella/analysis.hpp"
#include "chiarella/core.hpp"
#include "chiarella/data.hpp"
#include "chiarella/em.hpp"
#include "chiarella/io.hpp"
#include "chiarella/kalman.hpp"
#include "chiarella/mle.hpp"
#include "chiarella/optim.hpp"
#include "chiarella/rng.hpp"
#include "chiarella/series.hpp"
#include "chiarella/simulate.hpp"
#include "chiarella/ukf.hpp"
