#pragma once

#include "nstab/bounds.hpp"
#include "nstab/criteria.hpp"
#include "nstab/error.hpp"
#include "nstab/funcspec.hpp"
#include "nstab/logistic.hpp"
#include "nstab/problem.hpp"
#include "nstab/quadrature.hpp"
#include "nstab/report.hpp"
#include "nstab/series.hpp"
#include "nstab/simulator.hpp"
#include "nstab/sweep.hpp"
