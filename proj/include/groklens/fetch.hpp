#pragma once

// Downloads the four MNIST gzip archives, checks their lengths, inflates them
// and checks the IDX sizes. Files go through a temporary name and are renamed
// only after every check passes.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

// Eigen must precede httplib: <resolv.h> defines a `_res` macro that collides
// with Eigen parameter names.
#include "groklens/datasets.hpp"
#include "groklens/error.hpp"

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

#include <zlib.h>

namespace groklens {

struct RemoteFile {
  std::string name;                          // decompressed file name
  std::optional<std::uintmax_t> gz_bytes;    // archive length, when known
  std::uintmax_t bytes = 0;                  // decompressed length
};

/// Canonical archive and IDX lengths (IDX: 16 + count*784 for images, 8 + count for labels).
inline std::vector<RemoteFile> mnist_files() {
  return {{"train-images-idx3-ubyte", 9912422, 16 + 60000ull * 784},
          {"train-labels-idx1-ubyte", 28881, 8 + 60000},
          {"t10k-images-idx3-ubyte", 1648877, 16 + 10000ull * 784},
          {"t10k-labels-idx1-ubyte", 4542, 8 + 10000}};
}

inline constexpr const char* kMnistBaseUrl = "https://ossci-datasets.s3.amazonaws.com/mnist";

struct FetchOptions {
  std::string base_url = kMnistBaseUrl;
  std::vector<RemoteFile> files = mnist_files();
  int timeout_seconds = 60;
};

struct FetchResult {
  std::vector<std::string> downloaded;
  std::vector<std::string> skipped;
};

inline std::string gunzip(const std::string& gz) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw DataError("zlib init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(gz.data()));
  zs.avail_in = static_cast<uInt>(gz.size());
  std::string out;
  char buf[1 << 16];
  int rc = Z_OK;
  while (rc == Z_OK) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof(buf);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw DataError("corrupt gzip stream");
    }
    out.append(buf, sizeof(buf) - zs.avail_out);
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw DataError("truncated gzip stream");
    }
  }
  inflateEnd(&zs);
  return out;
}

inline std::string gzip(const std::string& raw) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw DataError("zlib init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(raw.data()));
  zs.avail_in = static_cast<uInt>(raw.size());
  std::string out;
  char buf[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof(buf);
    rc = deflate(&zs, Z_FINISH);
    if (rc == Z_STREAM_ERROR) {
      deflateEnd(&zs);
      throw DataError("gzip compression failed");
    }
    out.append(buf, sizeof(buf) - zs.avail_out);
  }
  deflateEnd(&zs);
  return out;
}

/// True when `path` has the expected length and a matching IDX magic.
inline bool idx_file_valid(const std::filesystem::path& path, std::uintmax_t bytes) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec) || std::filesystem::file_size(path, ec) != bytes) return false;
  std::ifstream in(path, std::ios::binary);
  unsigned char head[4] = {};
  in.read(reinterpret_cast<char*>(head), 4);
  if (!in) return false;
  const std::uint32_t magic = (std::uint32_t{head[0]} << 24) | (std::uint32_t{head[1]} << 16) |
                              (std::uint32_t{head[2]} << 8) | head[3];
  return magic == kIdxImageMagic || magic == kIdxLabelMagic;
}

namespace detail {

inline std::string http_get(const std::string& base_url, const std::string& name, int timeout) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw DataError("base URL lacks a scheme: " + base_url);
  const auto host_end = base_url.find('/', scheme_end + 3);
  const std::string origin = base_url.substr(0, host_end);
  std::string prefix = host_end == std::string::npos ? "" : base_url.substr(host_end);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  httplib::Client client(origin);
  client.set_follow_location(true);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  const auto res = client.Get(prefix + "/" + name);
  if (!res) throw DataError("network failure fetching " + name + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw DataError("HTTP " + std::to_string(res->status) + " fetching " + name);
  return res->body;
}

}  // namespace detail

/// Ensures every file of `opts.files` is present and valid in `dir`.
inline FetchResult fetch_mnist(const std::filesystem::path& dir, const FetchOptions& opts = {}) {
  std::filesystem::create_directories(dir);
  FetchResult result;
  for (const auto& f : opts.files) {
    const auto dest = dir / f.name;
    if (idx_file_valid(dest, f.bytes)) {
      result.skipped.push_back(f.name);
      continue;
    }
    const auto body = detail::http_get(opts.base_url, f.name + ".gz", opts.timeout_seconds);
    if (f.gz_bytes && body.size() != *f.gz_bytes)
      throw DataError(f.name + ".gz: length " + std::to_string(body.size()) + " != expected " +
                      std::to_string(*f.gz_bytes));
    const auto raw = gunzip(body);
    if (raw.size() != f.bytes)
      throw DataError(f.name + ": decompressed length " + std::to_string(raw.size()) + " != expected " +
                      std::to_string(f.bytes));
    const auto tmp = dir / (f.name + ".part");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
      if (!out) {
        std::filesystem::remove(tmp);
        throw IoError("cannot write " + tmp.string());
      }
    }
    if (!idx_file_valid(tmp, f.bytes)) {
      std::filesystem::remove(tmp);
      throw DataError(f.name + ": downloaded file is not an IDX file");
    }
    std::filesystem::rename(tmp, dest);
    result.downloaded.push_back(f.name);
  }
  return result;
}

}  // namespace groklens
