// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vacot {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// Cosine of the angle between a and b; 0 when either is the zero vector.
double cosine(std::span<const double> a, std::span<const double> b);

/// Hex-encoded BLAKE2b-256 digest.
std::string content_hash_hex(std::string_view data);

/// First 8 bytes of a BLAKE2b digest, for seeding.
std::uint64_t hash64(std::string_view data);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames, so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

} // namespace vacot
