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

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>

namespace redirsim {

/// Flat in-memory file tree keyed by canonical absolute paths. Pure
/// storage: permission and overlay decisions live with the caller.
class FileTree {
public:
    /// Registers a directory and all its ancestors.
    void mkdirs(const std::string& canonical_dir);

    /// Creates or appends. Ancestor directories are registered as a
    /// side effect; existence checks are the caller's job.
    void append(const std::string& canonical_path, std::string_view data);

    /// Creates the file empty if absent; no-op otherwise.
    void touch(const std::string& canonical_path);

    /// Creates or replaces the file content.
    void put(const std::string& canonical_path, std::string_view data);

    bool erase(const std::string& canonical_path);

    bool has_file(const std::string& canonical_path) const;
    bool has_dir(const std::string& canonical_dir) const;
    const std::string* read(const std::string& canonical_path) const;

    size_t file_count() const { return files_.size(); }
    const std::map<std::string, std::string>& files() const { return files_; }
    const std::set<std::string>& dirs() const { return dirs_; }

    /// Order-independent content digest (FNV-1a over sorted entries).
    uint64_t digest() const;

private:
    std::map<std::string, std::string> files_;
    std::set<std::string> dirs_{"/"};
};

std::string digest_hex(uint64_t digest);

}  // namespace redirsim
