#ifndef EELWRIST_EELWRIST_HPP
#define EELWRIST_EELWRIST_HPP

// Umbrella header: the whole toolkit in one include.

#include "orientation.hpp"
#include "geometry.hpp"
#include "kinematics.hpp"
#include "jacobian.hpp"
#include "constraints.hpp"
#include "workspace.hpp"
#include "io.hpp"

#endif  // EELWRIST_EELWRIST_HPP
