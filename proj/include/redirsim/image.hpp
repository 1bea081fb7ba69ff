/*
 * Copyright (C) 2026 The redirsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string>

#include "redirsim/vfs.hpp"

namespace redirsim {

/// Minimal OS image: init, core daemons, libraries, configuration.
/// Deterministic content, suitable as the shared read-only tree.
FileTree builtin_host_image();

/// Loads an image from a directory snapshot; file paths become
/// absolute tree paths. Throws SimError{ConfigError} if unreadable.
FileTree load_host_image(const std::string& directory);

/// Deterministic fake binary bytes for a path that is not present in
/// the image (synthesized app code).
std::string synthesize_binary(const std::string& path);

/// Deterministic fake package archive bytes.
std::string synthesize_package(const std::string& package);

}  // namespace redirsim
