#pragma once

#include "fisheyedist/center_adjust.hpp"
#include "fisheyedist/dataset_io.hpp"
#include "fisheyedist/errors.hpp"
#include "fisheyedist/eval_metrics.hpp"
#include "fisheyedist/geo_estimator.hpp"
#include "fisheyedist/mlp_estimator.hpp"
#include "fisheyedist/pairs.hpp"
#include "fisheyedist/synth_scene.hpp"
#include "fisheyedist/usm_camera.hpp"
