#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "rduniband/types.hpp"

namespace rdu {

struct MissingColumn : std::runtime_error {
  explicit MissingColumn(const std::string& col)
      : std::runtime_error("missing column: " + col), column(col) {}
  std::string column;
};

struct ParseError : std::runtime_error {
  ParseError(std::size_t line_no, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + what),
        line(line_no) {}
  std::size_t line;
};

struct EmptyFile : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// CSV with a header row naming `x` and `y` (any order); optional `d` and `g`;
// other columns are ignored. Line numbers in errors are 1-based and include
// the header.
ObservationSet ingest_csv(const std::string& path);

// Entry point for the `rduniband` binary: subcommands estimate / test /
// simulate / bandwidth. Returns the process exit status.
int run_cli(int argc, char** argv);

}  // namespace rdu
