/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: samples/nsc_unknown_poses.cpp
 *
 * Copyright 2026 The gsft Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "gsft/gsft.hpp"

#include <iostream>

// Same kind of scene but the cameras are not calibrated against each other:
// only camera-frame ray directions are given. Shape and relative poses come
// back in the frame of the first camera.
int main()
{
    using namespace gsft;
    const Scenario sc = generate_scenario(ladder_config(1, true, 3));
    InteriorPointBackend backend;
    const NscSolution s = solve_nsc(*sc.nsc, backend);

    const RigidTransform gt_anchor = sc.gt_viewpoint_poses.front().inverse();
    const Points3 est = s.transforms.front().apply(s.shape(sc.model));
    std::cout << "status            " << to_string(s.status) << '\n';
    std::cout << "anchor rmse (au)  " << rmse(est, gt_anchor.apply(sc.gt_points)) << '\n';
    for (std::size_t x = 0; x < s.relative_poses.size(); ++x) {
        const RigidTransform gt_rel = gt_anchor * sc.gt_viewpoint_poses[x];
        std::cout << "view " << x << ": scale drift " << s.rank[x].scale << ", rank ratio " << s.rank[x].ratio
                  << ", relative rotation err " << rotation_error_deg(s.relative_poses[x].rotation, gt_rel.rotation)
                  << " deg\n";
    }
    return 0;
}
