#pragma once

#include "svykit/covariance.hpp"
#include "svykit/design.hpp"
#include "svykit/errors.hpp"
#include "svykit/estimators.hpp"
#include "svykit/linalg.hpp"
#include "svykit/montecarlo.hpp"
#include "svykit/parse.hpp"
#include "svykit/population.hpp"
#include "svykit/report.hpp"
#include "svykit/reproduce.hpp"
#include "svykit/rng.hpp"
#include "svykit/sums.hpp"
#include "svykit/textutil.hpp"
