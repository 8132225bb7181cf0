/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: samples/ns_two_views.cpp
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

// Two calibrated views, 50 correspondences each, no noise.
int main()
{
    using namespace gsft;
    const Scenario sc = generate_scenario(ladder_config(1, false, 3));
    InteriorPointBackend backend;
    const NsSolution s = solve_ns(sc.ns, backend);

    std::cout << "status       " << to_string(s.status) << " after " << s.iterations << " iterations\n";
    std::cout << "rank ratio   " << s.rank.ratio << '\n';
    std::cout << "weights      " << s.instance.weights.transpose() << '\n';
    std::cout << "gt weights   " << sc.gt_instance.weights.transpose() << '\n';
    std::cout << "rmse (au)    " << rmse(s.reconstruction, sc.gt_points) << '\n';
    std::cout << "rot err (deg) " << rotation_error_deg(s.instance.pose.rotation, sc.gt_instance.pose.rotation)
              << '\n';
    return 0;
}
