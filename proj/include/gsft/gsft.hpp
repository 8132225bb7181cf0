/*
 * gsft - Shape-from-Template with generalised cameras.
 *
 * File: include/gsft/gsft.hpp
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
#pragma once

#ifndef GSFT_GSFT_HPP_
#define GSFT_GSFT_HPP_

#include "gsft/alpha_shape.hpp"
#include "gsft/conic.hpp"
#include "gsft/error.hpp"
#include "gsft/experiment.hpp"
#include "gsft/geometry.hpp"
#include "gsft/io.hpp"
#include "gsft/ipm.hpp"
#include "gsft/lifting.hpp"
#include "gsft/metrics.hpp"
#include "gsft/ns.hpp"
#include "gsft/nsc.hpp"
#include "gsft/shape_model.hpp"
#include "gsft/silhouette.hpp"
#include "gsft/synth.hpp"

#endif // GSFT_GSFT_HPP_
