#include "harvestkit/mp.hpp"

#include <cmath>

namespace hk {

namespace {
std::recursive_mutex& precision_mutex() {
  static std::recursive_mutex m;
  return m;
}

unsigned bits_to_digits10(unsigned bits) {
  return static_cast<unsigned>(std::ceil(bits * 0.30102999566398119)) + 1;
}
}  // namespace

unsigned mp_precision_bits() {
  mp_real probe;
  return static_cast<unsigned>(mpfr_get_prec(probe.backend().data()));
}

PrecisionScope::PrecisionScope(unsigned bits)
    : lock_(precision_mutex()), saved_(mp_real::default_precision()) {
  mp_real::default_precision(bits_to_digits10(bits));
}

PrecisionScope::~PrecisionScope() { mp_real::default_precision(saved_); }

}  // namespace hk
