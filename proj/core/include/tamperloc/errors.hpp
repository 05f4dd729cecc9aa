#pragma once

#include <stdexcept>
#include <string>

namespace tamperloc {

/// Malformed or unreadable input data (files, manifests, headers).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// I/O failure on a specific path.
class IoError : public DataError {
 public:
  IoError(const std::string& path, const std::string& what)
      : DataError(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace tamperloc
