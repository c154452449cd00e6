#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ikesim {

using Bytes = std::vector<std::uint8_t>;

enum class AlgorithmRole { encryption, integrity, key_establishment, authentication };

std::string_view to_string(AlgorithmRole role) noexcept;

/// Byte-size model of one algorithm. Nothing here computes cryptography;
/// the sizes decide how much an IKEv2 message weighs on the wire.
struct AlgorithmSpec {
  std::string name;
  AlgorithmRole role = AlgorithmRole::encryption;
  std::size_t key_length = 0;
  // Object carried on the wire for this role: KE public value or
  // encapsulation key, certificate public key for authentication.
  std::size_t public_object_size = 0;
  // Object sent by the responder for a key establishment (KEM ciphertext,
  // DH public value). Equal to public_object_size unless overridden.
  std::size_t response_object_size = 0;
  // Detached signature, authentication role only.
  std::size_t signature_size = 0;

  /// Throws ValidationError when an invariant does not hold.
  void validate(std::string_view field = "algorithm") const;

  bool operator==(const AlgorithmSpec&) const = default;
};

enum class SuiteId { classical, qrc, custom };

std::string_view to_string(SuiteId id) noexcept;
/// Throws ValidationError for names other than classical/qrc/custom.
SuiteId parse_suite_id(std::string_view name);

struct CryptoSuite {
  SuiteId id = SuiteId::custom;
  AlgorithmSpec encryption;
  AlgorithmSpec integrity;
  std::vector<AlgorithmSpec> key_establishments;
  AlgorithmSpec authentication;

  void validate(std::string_view field = "suite") const;

  bool operator==(const CryptoSuite&) const = default;
};

// Algorithm presets. Authentication signature sizes and the classical
// certificate key are not part of the evaluated key-length table; they use
// FIPS 204 / SEC1 values and can be overridden through a custom suite.
AlgorithmSpec aes256_cbc();
AlgorithmSpec hmac_sha256();
AlgorithmSpec dhke_modp2048();
AlgorithmSpec ecdsa_p256();
AlgorithmSpec ml_kem_768();
AlgorithmSpec ml_dsa_87();

CryptoSuite classical_suite();
CryptoSuite qrc_suite();

/// Which object of an algorithm a byte string stands in for.
enum class MaterialField { key, public_object, response_object, signature };

std::size_t material_size(const AlgorithmSpec& spec, MaterialField field) noexcept;

/// Deterministic pseudo-random bytes of exactly `material_size(spec, field)`
/// bytes. Pure function of (spec.name, spec.role, field, seed).
Bytes opaque_material(const AlgorithmSpec& spec, MaterialField field, std::uint64_t seed);

/// Deterministic filler for payloads with no algorithm behind them
/// (proposals, nonces, identities).
Bytes filler_bytes(std::string_view label, std::size_t size, std::uint64_t seed);

/// Source of key/signature bytes placed in messages. The default stand-in is
/// size-faithful random data; a real KEM/signature backend can replace it
/// without touching the engine, as long as it honours material_size().
class MaterialProvider {
 public:
  virtual ~MaterialProvider() = default;
  virtual Bytes material(const AlgorithmSpec& spec, MaterialField field,
                         std::uint64_t seed) const = 0;
};

class OpaqueMaterialProvider final : public MaterialProvider {
 public:
  Bytes material(const AlgorithmSpec& spec, MaterialField field,
                 std::uint64_t seed) const override {
    return opaque_material(spec, field, seed);
  }
};

}  // namespace ikesim
