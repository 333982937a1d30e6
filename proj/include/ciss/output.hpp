/* Copyright 2026 The Cisspin Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <string>

#include "ciss/experiments.hpp"

namespace ciss {

// CSV with '#' metadata header, axis columns leading, data in column-major
// order (first axis fastest), every number %.16e (17 significant digits).
void write_spectrum_csv(const std::string& path, const SpectrumResult& spec);

// Inverse of write_spectrum_csv for our own files (used by the plot verb).
SpectrumResult read_spectrum_csv(const std::string& path);

void write_spectrum_json(const std::string& path, const SpectrumResult& spec);

// Static plots, no display server: line plot for 1D, heatmap for 2D.
void write_spectrum_svg(const std::string& path, const SpectrumResult& spec);

}  // namespace ciss
