#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gtschr {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed graphs, rules or project files. Carries every problem found.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<std::string> problems)
      : Error(what), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

// An analysis prerequisite (confluence, shared symbols) does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace gtschr
