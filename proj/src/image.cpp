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

#include "redirsim/image.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "redirsim/model.hpp"
#include "redirsim/policy.hpp"

namespace redirsim {

namespace {

namespace fs = std::filesystem;

void add_standard_dirs(FileTree& tree) {
    for (const char* dir : {"/data/data", "/data/local/tmp", "/data/misc", "/cache",
                            "/sdcard", "/dev", "/proc", "/tmp"}) {
        tree.mkdirs(dir);
    }
}

}  // namespace

std::string synthesize_binary(const std::string& path) {
    std::string bytes = "\x7f";
    bytes += "ELF";
    bytes.push_back(1);
    bytes.push_back(1);
    bytes += "\0\0";
    bytes += "sim-bin:";
    bytes += path;
    // Fake section table so exploit code has something to scan for.
    bytes += "\n.got:";
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : path) h = (h ^ c) * 0x100000001b3ull;
    for (int i = 0; i < 16; ++i) {
        bytes.push_back(static_cast<char>('a' + ((h >> (i * 4)) & 0xf)));
    }
    bytes.push_back('\n');
    return bytes;
}

std::string synthesize_package(const std::string& package) {
    std::string bytes = "PK\x03\x04";
    bytes += "sim-apk:";
    bytes += package;
    bytes += "\nclasses.dex\nAndroidManifest.xml\n";
    return bytes;
}

FileTree builtin_host_image() {
    FileTree tree;
    tree.append("/init", synthesize_binary("/init"));
    tree.append("/init.rc",
                "service vold /system/bin/vold\n    socket vold stream 0660 root mount\n"
                "service logcat /system/bin/logcat\n");

    for (const char* bin : {"/system/bin/app_process", "/system/bin/servicemanager",
                            "/system/bin/vold", "/system/bin/logcat", "/system/bin/sh",
                            "/system/bin/toolbox", "/system/bin/system_server"}) {
        tree.append(bin, synthesize_binary(bin));
    }
    for (const char* lib : {"/system/lib/libc.so", "/system/lib/libm.so",
                            "/system/lib/liblog.so", "/system/lib/libbinder.so",
                            "/system/lib/libcutils.so"}) {
        tree.append(lib, synthesize_binary(lib));
    }
    tree.append("/system/framework/framework.jar", synthesize_package("framework"));
    tree.append("/system/framework/services.jar", synthesize_package("services"));
    tree.append("/system/build.prop",
                "ro.build.version.release=2.3.4\nro.product.device=sim\n");

    tree.append("/etc/hosts", "127.0.0.1 localhost\n");
    tree.append("/etc/vold.fstab",
                "dev_mount sdcard /mnt/sdcard auto /devices/platform/mmc\n");
    tree.append("/etc/permissions/platform.xml", "<permissions/>\n");

    add_standard_dirs(tree);
    return tree;
}

FileTree load_host_image(const std::string& directory) {
    std::error_code ec;
    fs::path root(directory);
    if (!fs::is_directory(root, ec)) {
        throw SimError(ErrorCode::ConfigError, "image directory not found: " + directory);
    }
    FileTree tree;
    for (auto it = fs::recursive_directory_iterator(root, ec);
         it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) {
            throw SimError(ErrorCode::ConfigError, "image walk failed: " + ec.message());
        }
        if (!it->is_regular_file()) continue;
        std::ifstream in(it->path(), std::ios::binary);
        if (!in) {
            throw SimError(ErrorCode::ConfigError,
                           "unreadable image file: " + it->path().string());
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        std::string rel = fs::relative(it->path(), root, ec).generic_string();
        tree.append(canonicalize_path("/" + rel), buf.str());
    }
    add_standard_dirs(tree);
    return tree;
}

}  // namespace redirsim
