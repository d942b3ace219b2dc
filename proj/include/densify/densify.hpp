#ifndef DENSIFY_DENSIFY_HPP
#define DENSIFY_DENSIFY_HPP

#include "densify/common.hpp"
#include "densify/geometry/anchor_map.hpp"
#include "densify/geometry/camera.hpp"
#include "densify/geometry/convex_hull.hpp"
#include "densify/geometry/hpr.hpp"
#include "densify/geometry/lidar_cloud.hpp"
#include "densify/importance/pixel_importance.hpp"
#include "densify/importance/roi_mask.hpp"
#include "densify/importance/spatial_importance.hpp"
#include "densify/io/image_io.hpp"
#include "densify/io/manifest.hpp"
#include "densify/io/pfm.hpp"
#include "densify/io/ply.hpp"
#include "densify/io/resize.hpp"
#include "densify/pipeline/pipeline.hpp"
#include "densify/refine/clustering.hpp"
#include "densify/refine/depth_map.hpp"
#include "densify/refine/global_scale.hpp"
#include "densify/refine/local_scale.hpp"
#include "densify/sampling/sampling.hpp"
#include "densify/synth/synth.hpp"

#endif  // DENSIFY_DENSIFY_HPP
