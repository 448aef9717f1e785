#pragma once

// Umbrella header for the shapeflow library.

#include "shapeflow/common.hpp"
#include "shapeflow/grid.hpp"
#include "shapeflow/setops.hpp"
#include "shapeflow/measure.hpp"
#include "shapeflow/pde.hpp"
#include "shapeflow/radial.hpp"
#include "shapeflow/capmeasure.hpp"
#include "shapeflow/functional.hpp"
#include "shapeflow/project_x.hpp"
#include "shapeflow/flow_measure.hpp"
#include "shapeflow/flow_shape.hpp"
#include "shapeflow/annulus_study.hpp"
#include "shapeflow/square_study.hpp"
#include "shapeflow/io.hpp"
