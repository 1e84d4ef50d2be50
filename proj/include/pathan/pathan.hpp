#pragma once

#include "pathan/causal_model.hpp"
#include "pathan/dataset.hpp"
#include "pathan/distributions.hpp"
#include "pathan/effects.hpp"
#include "pathan/error.hpp"
#include "pathan/estimator.hpp"
#include "pathan/fit_trim.hpp"
#include "pathan/report.hpp"
#include "pathan/screening.hpp"
#include "pathan/tracer.hpp"
