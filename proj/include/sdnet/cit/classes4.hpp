#pragma once

#include <array>

#include "sdnet/dataset/types.hpp"

namespace sdnet::cit {

/// The four transformed classes. The index order is the classifier's label
/// order and is part of the checkpoint/report contracts.
enum class Class4 { NMinus = 0, NPlus = 1, PMinus = 2, PPlus = 3 };

inline constexpr std::array<Class4, 4> kClass4Order{Class4::NMinus, Class4::NPlus,
                                                    Class4::PMinus, Class4::PPlus};

inline const char* to_string(Class4 c) {
  switch (c) {
    case Class4::NMinus: return "N-";
    case Class4::NPlus: return "N+";
    case Class4::PMinus: return "P-";
    case Class4::PPlus: return "P+";
  }
  return "?";
}

inline Class4 class4_from_string(const std::string& s) {
  if (s == "N-") return Class4::NMinus;
  if (s == "N+") return Class4::NPlus;
  if (s == "P-") return Class4::PMinus;
  if (s == "P+") return Class4::PPlus;
  throw Error("unknown four-class label '" + s + "'");
}

/// Label of a transformed image: the source class keeps its letter, the
/// generator contributes the sign.
inline Class4 transformed_label(dataset::ClassLabel source, bool positively_transformed) {
  if (source == dataset::ClassLabel::P)
    return positively_transformed ? Class4::PPlus : Class4::PMinus;
  return positively_transformed ? Class4::NPlus : Class4::NMinus;
}

inline bool is_positive_class(Class4 c) { return c == Class4::PMinus || c == Class4::PPlus; }

}  // namespace sdnet::cit
