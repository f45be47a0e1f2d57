// Copyright (c) 2026, The routelab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

namespace routelab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace routelab
