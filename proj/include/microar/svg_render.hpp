#pragma once

#include <string>

#include "microar/core_model.hpp"
#include "microar/layout_engine.hpp"

namespace microar::render {

// Top-down orthographic view of one scene in plane-local coordinates: +x to
// the right, +z down the page, one SVG user unit per meter. Each object is a
// rectangle equal to its object_footprint, labeled with the asset name;
// dialogs are callouts at the balloon offset. Output bytes depend only on the
// inputs. Throws std::out_of_range for a bad scene index.
std::string render_scene_svg(const Story& story, int scene_index,
                             const layout::BoundsLookup& bounds = layout::unit_cube_bounds);

}  // namespace microar::render
