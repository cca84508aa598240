// SPDX-License-Identifier: Apache-2.0
#include "vacot/util.hpp"

#include "vacot/error.hpp"

#include <sodium.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace vacot {

namespace {

void ensure_sodium()
{
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0)
            throw Error(Errc::IoFailure, "libsodium initialisation failed");
    });
}

} // namespace

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i)
        s += a[i] * b[i];
    return s;
}

double l2_norm(std::span<const double> a)
{
    return std::sqrt(dot(a, a));
}

double squared_distance(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        double const d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double cosine(std::span<const double> a, std::span<const double> b)
{
    double const na = l2_norm(a);
    double const nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0)
        return 0.0;
    double const c = dot(a, b) / (na * nb);
    return std::clamp(c, -1.0, 1.0);
}

std::string content_hash_hex(std::string_view data)
{
    ensure_sodium();
    std::array<unsigned char, 32> digest {};
    crypto_generichash(digest.data(), digest.size(), reinterpret_cast<const unsigned char*>(data.data()),
                       data.size(), nullptr, 0);
    std::array<char, 65> hex {};
    sodium_bin2hex(hex.data(), hex.size(), digest.data(), digest.size());
    return std::string(hex.data());
}

std::uint64_t hash64(std::string_view data)
{
    ensure_sodium();
    std::array<unsigned char, 16> digest {};
    crypto_generichash(digest.data(), digest.size(), reinterpret_cast<const unsigned char*>(data.data()),
                       data.size(), nullptr, 0);
    std::uint64_t h = 0;
    for (int i = 0; i < 8; ++i)
        h = (h << 8) | digest[static_cast<std::size_t>(i)];
    return h;
}

std::string base64_encode(std::span<const std::uint8_t> bytes)
{
    ensure_sodium();
    auto const len = sodium_base64_ENCODED_LEN(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
    std::string out(len, '\0');
    sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), sodium_base64_VARIANT_ORIGINAL);
    out.resize(std::strlen(out.c_str()));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text)
{
    ensure_sodium();
    std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
    std::size_t written = 0;
    if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &written, nullptr,
                          sodium_base64_VARIANT_ORIGINAL)
        != 0)
        throw Error(Errc::MalformedInput, "invalid base64 payload");
    out.resize(written);
    return out;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(Errc::IoFailure, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
    static std::atomic<std::uint64_t> counter {0};
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp" + std::to_string(std::hash<std::thread::id> {}(std::this_thread::get_id())) + "_"
           + std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(Errc::IoFailure, "cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out)
            throw Error(Errc::IoFailure, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace vacot
