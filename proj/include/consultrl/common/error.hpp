#pragma once

#include <stdexcept>
#include <string>

namespace consultrl {

// Base of every error the library raises. Each subclass maps to one named
// failure of an operation contract so callers can catch precisely.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// dialogue
class RoleOrderViolation : public Error {
 public:
  using Error::Error;
};
class IndexGap : public Error {
 public:
  using Error::Error;
};
class EpisodeClosed : public Error {
 public:
  using Error::Error;
};
class MissingAction : public Error {
 public:
  using Error::Error;
};
class InvalidEpisode : public Error {
 public:
  using Error::Error;
};

// agents
class TransportError : public Error {
 public:
  using Error::Error;
};
class ProtocolError : public Error {
 public:
  using Error::Error;
};
class EmptyObservation : public Error {
 public:
  using Error::Error;
};
class FormatViolation : public Error {
 public:
  using Error::Error;
};
class JudgeFormatError : public Error {
 public:
  using Error::Error;
};
class InvalidRequest : public Error {
 public:
  using Error::Error;
};

// reward
class InvalidScore : public Error {
 public:
  using Error::Error;
};
class DegenerateWeights : public Error {
 public:
  using Error::Error;
};

// experience
class EmbeddingError : public Error {
 public:
  using Error::Error;
};
class StorageError : public Error {
 public:
  using Error::Error;
};
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};
class RerankError : public Error {
 public:
  using Error::Error;
};
class EmptyCandidates : public Error {
 public:
  using Error::Error;
};

// grpo
class EmptyGroup : public Error {
 public:
  using Error::Error;
};
class TooFewRollouts : public Error {
 public:
  using Error::Error;
};

// evaluation
class InvalidPattern : public Error {
 public:
  using Error::Error;
};
class UnknownMetric : public Error {
 public:
  using Error::Error;
};

// shared
class IoError : public Error {
 public:
  using Error::Error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace consultrl
