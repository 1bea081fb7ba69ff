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

#include "redirsim/vfs.hpp"

#include <cstdio>

namespace redirsim {

namespace {

std::string parent_dir(const std::string& path) {
    size_t slash = path.find_last_of('/');
    if (slash == std::string::npos || slash == 0) return "/";
    return path.substr(0, slash);
}

constexpr uint64_t kFnvOffset = 14695981039346656037ull;
constexpr uint64_t kFnvPrime = 1099511628211ull;

void fnv_mix(uint64_t& h, std::string_view bytes) {
    for (unsigned char c : std::string_view(bytes)) {
        h ^= c;
        h *= kFnvPrime;
    }
    h ^= 0xff;  // entry separator
    h *= kFnvPrime;
}

}  // namespace

void FileTree::mkdirs(const std::string& canonical_dir) {
    std::string dir = canonical_dir;
    while (!dir.empty() && dir != "/") {
        if (!dirs_.insert(dir).second) break;
        dir = parent_dir(dir);
    }
}

void FileTree::append(const std::string& canonical_path, std::string_view data) {
    mkdirs(parent_dir(canonical_path));
    files_[canonical_path].append(data);
}

void FileTree::touch(const std::string& canonical_path) {
    mkdirs(parent_dir(canonical_path));
    files_.try_emplace(canonical_path);
}

void FileTree::put(const std::string& canonical_path, std::string_view data) {
    mkdirs(parent_dir(canonical_path));
    files_[canonical_path] = std::string(data);
}

bool FileTree::erase(const std::string& canonical_path) {
    return files_.erase(canonical_path) > 0;
}

bool FileTree::has_file(const std::string& canonical_path) const {
    return files_.count(canonical_path) > 0;
}

bool FileTree::has_dir(const std::string& canonical_dir) const {
    return dirs_.count(canonical_dir) > 0;
}

const std::string* FileTree::read(const std::string& canonical_path) const {
    auto it = files_.find(canonical_path);
    return it == files_.end() ? nullptr : &it->second;
}

uint64_t FileTree::digest() const {
    uint64_t h = kFnvOffset;
    for (const auto& [path, data] : files_) {
        fnv_mix(h, path);
        fnv_mix(h, data);
    }
    return h;
}

std::string digest_hex(uint64_t digest) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

}  // namespace redirsim
