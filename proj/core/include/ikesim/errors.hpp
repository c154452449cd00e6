#pragma once

#include <stdexcept>
#include <string>

namespace ikesim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An unencrypted message does not fit in one datagram and may not be
/// fragmented at the application layer.
class UnfragmentableMessage : public Error {
 public:
  using Error::Error;
};

/// Fragments of one message disagree on the total fragment count.
class InconsistentTotals : public Error {
 public:
  using Error::Error;
};

/// A datagram does not fit the state the receiving endpoint is in.
class ProtocolViolation : public Error {
 public:
  using Error::Error;
};

/// Gilbert-Elliott chain with P = R = 0 has no stationary distribution.
class DegenerateChain : public Error {
 public:
  using Error::Error;
};

/// Datagram larger than the link MTU reached the channel.
class OversizedDatagram : public Error {
 public:
  using Error::Error;
};

class NotEstablished : public Error {
 public:
  using Error::Error;
};

class EmptySample : public Error {
 public:
  using Error::Error;
};

/// Sample has zero variance, correlation is undefined.
class DegenerateSample : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// Configuration value out of its domain. `field()` holds the dotted path
/// of the offending key, e.g. "engine.max_retries".
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message);

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class PeerUnreachable : public Error {
 public:
  using Error::Error;
};

}  // namespace ikesim
