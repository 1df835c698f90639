#pragma once

#include <stdexcept>
#include <string>

namespace stc {

// Tensor shapes or index arities that do not agree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input text (CSV, token records, model archives).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that parses but does not match the requested schema.
class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A record that cannot be used for the requested purpose, e.g. a training
// record without any encodable label.
class InvalidRecordError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

}  // namespace stc
