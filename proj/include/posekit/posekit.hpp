#pragma once

// Umbrella header for the pose post-processing toolkit.

#include "posekit/detection_nms.hpp"
#include "posekit/error.hpp"
#include "posekit/flow.hpp"
#include "posekit/geometry.hpp"
#include "posekit/heatmap.hpp"
#include "posekit/hungarian.hpp"
#include "posekit/image.hpp"
#include "posekit/io/config.hpp"
#include "posekit/io/image_io.hpp"
#include "posekit/io/jsonl.hpp"
#include "posekit/io/tensor_io.hpp"
#include "posekit/metrics.hpp"
#include "posekit/pipeline.hpp"
#include "posekit/pose.hpp"
#include "posekit/pose_nms.hpp"
#include "posekit/render.hpp"
#include "posekit/skeleton.hpp"
#include "posekit/smoothing.hpp"
#include "posekit/synth.hpp"
#include "posekit/tracking.hpp"
