#include "ikesim/suite.hpp"

#include <random>
#include <string>

#include "ikesim/errors.hpp"

namespace ikesim {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::string_view text, std::uint64_t hash = kFnvOffset) {
  for (unsigned char c : text) {
    hash ^= c;
    hash *= kFnvPrime;
  }
  return hash;
}

std::uint64_t fnv1a(std::uint64_t value, std::uint64_t hash) {
  for (int i = 0; i < 8; ++i) {
    hash ^= (value >> (8 * i)) & 0xffU;
    hash *= kFnvPrime;
  }
  return hash;
}

Bytes stream_bytes(std::uint64_t key, std::size_t size) {
  std::mt19937_64 rng(key);
  Bytes out(size);
  std::size_t i = 0;
  while (i < size) {
    std::uint64_t word = rng();
    for (int b = 0; b < 8 && i < size; ++b, ++i) {
      out[i] = static_cast<std::uint8_t>(word >> (8 * b));
    }
  }
  return out;
}

AlgorithmSpec make(std::string name, AlgorithmRole role, std::size_t key_length,
                   std::size_t public_object = 0, std::size_t signature = 0) {
  AlgorithmSpec spec;
  spec.name = std::move(name);
  spec.role = role;
  spec.key_length = key_length;
  spec.public_object_size = public_object;
  spec.response_object_size = public_object;
  spec.signature_size = signature;
  return spec;
}

}  // namespace

std::string_view to_string(AlgorithmRole role) noexcept {
  switch (role) {
    case AlgorithmRole::encryption:
      return "encryption";
    case AlgorithmRole::integrity:
      return "integrity";
    case AlgorithmRole::key_establishment:
      return "key_establishment";
    case AlgorithmRole::authentication:
      return "authentication";
  }
  return "unknown";
}

std::string_view to_string(SuiteId id) noexcept {
  switch (id) {
    case SuiteId::classical:
      return "classical";
    case SuiteId::qrc:
      return "qrc";
    case SuiteId::custom:
      return "custom";
  }
  return "unknown";
}

SuiteId parse_suite_id(std::string_view name) {
  if (name == "classical") return SuiteId::classical;
  if (name == "qrc") return SuiteId::qrc;
  if (name == "custom") return SuiteId::custom;
  throw ValidationError("suite", "unknown suite '" + std::string(name) + "'");
}

void AlgorithmSpec::validate(std::string_view field) const {
  const std::string path(field);
  if (name.empty()) throw ValidationError(path + ".name", "must not be empty");
  if (key_length == 0) throw ValidationError(path + ".key_length", "must be > 0");
  const bool symmetric = role == AlgorithmRole::encryption || role == AlgorithmRole::integrity;
  if (symmetric && (public_object_size != 0 || response_object_size != 0)) {
    throw ValidationError(path + ".public_object_size",
                          "must be 0 for " + std::string(to_string(role)));
  }
  if (role != AlgorithmRole::authentication && signature_size != 0) {
    throw ValidationError(path + ".signature_size", "only authentication carries a signature");
  }
}

void CryptoSuite::validate(std::string_view field) const {
  const std::string path(field);
  auto check_slot = [&](const AlgorithmSpec& spec, AlgorithmRole role, const std::string& slot) {
    if (spec.role != role) {
      throw ValidationError(slot, "role " + std::string(to_string(spec.role)) +
                                      " does not match slot " + std::string(to_string(role)));
    }
    spec.validate(slot);
  };
  check_slot(encryption, AlgorithmRole::encryption, path + ".encryption");
  check_slot(integrity, AlgorithmRole::integrity, path + ".integrity");
  check_slot(authentication, AlgorithmRole::authentication, path + ".authentication");
  if (key_establishments.empty()) {
    throw ValidationError(path + ".key_establishments", "needs at least one entry");
  }
  if (id == SuiteId::classical && key_establishments.size() != 1) {
    throw ValidationError(path + ".key_establishments", "classical suite has exactly one");
  }
  for (std::size_t i = 0; i < key_establishments.size(); ++i) {
    check_slot(key_establishments[i], AlgorithmRole::key_establishment,
               path + ".key_establishments[" + std::to_string(i) + "]");
  }
}

AlgorithmSpec aes256_cbc() { return make("AES-256-CBC", AlgorithmRole::encryption, 32); }

AlgorithmSpec hmac_sha256() { return make("SHA-256-HMAC", AlgorithmRole::integrity, 32); }

AlgorithmSpec dhke_modp2048() {
  return make("DHKE-MODP-2048", AlgorithmRole::key_establishment, 256, 256);
}

AlgorithmSpec ecdsa_p256() {
  // 91 B is the DER SubjectPublicKeyInfo of a P-256 key; raw r||s signature.
  return make("ECDSA-P256", AlgorithmRole::authentication, 32, 91, 64);
}

AlgorithmSpec ml_kem_768() {
  return make("ML-KEM-768", AlgorithmRole::key_establishment, 2400, 2400);
}

AlgorithmSpec ml_dsa_87() {
  return make("ML-DSA-87", AlgorithmRole::authentication, 2592, 2592, 4627);
}

CryptoSuite classical_suite() {
  CryptoSuite suite;
  suite.id = SuiteId::classical;
  suite.encryption = aes256_cbc();
  suite.integrity = hmac_sha256();
  suite.key_establishments = {dhke_modp2048()};
  suite.authentication = ecdsa_p256();
  return suite;
}

CryptoSuite qrc_suite() {
  CryptoSuite suite;
  suite.id = SuiteId::qrc;
  suite.encryption = aes256_cbc();
  suite.integrity = hmac_sha256();
  suite.key_establishments = {ml_kem_768()};
  suite.authentication = ml_dsa_87();
  return suite;
}

std::size_t material_size(const AlgorithmSpec& spec, MaterialField field) noexcept {
  switch (field) {
    case MaterialField::key:
      return spec.key_length;
    case MaterialField::public_object:
      return spec.public_object_size;
    case MaterialField::response_object:
      return spec.response_object_size;
    case MaterialField::signature:
      return spec.signature_size;
  }
  return 0;
}

Bytes opaque_material(const AlgorithmSpec& spec, MaterialField field, std::uint64_t seed) {
  std::uint64_t key = fnv1a(spec.name);
  key = fnv1a(static_cast<std::uint64_t>(spec.role), key);
  key = fnv1a(static_cast<std::uint64_t>(field), key);
  key = fnv1a(seed, key);
  return stream_bytes(key, material_size(spec, field));
}

Bytes filler_bytes(std::string_view label, std::size_t size, std::uint64_t seed) {
  return stream_bytes(fnv1a(seed, fnv1a(label)), size);
}

}  // namespace ikesim
