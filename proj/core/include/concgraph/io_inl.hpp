#pragma once

#include <fstream>

#include "concgraph/error.hpp"

namespace concgraph {

template <class Fn>
void with_output(const std::filesystem::path& path, Fn&& fn, bool binary) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  fn(out);
  out.flush();
  if (!out) throw IoError("write failed on " + path.string());
}

template <class Fn>
auto with_input(const std::filesystem::path& path, Fn&& fn, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return fn(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace concgraph
