#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace planstitch {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. `offset` is the byte position where parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class FrameEstimationError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class PlacementError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

// Carries the indices of an irreducible infeasible subset of constraints.
class RefinementError : public Error {
 public:
  RefinementError(const std::string& what, std::vector<int> conflicting)
      : Error(what), conflicting_(std::move(conflicting)) {}
  const std::vector<int>& conflicting() const { return conflicting_; }

 private:
  std::vector<int> conflicting_;
};

}  // namespace planstitch
