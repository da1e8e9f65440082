#pragma once

#include <compare>
#include <string>

#include "dentocc/error.hpp"

namespace dentocc {

inline constexpr int kNumToothClasses = 32;

/// Universal tooth number 1..32 (1-16 upper jaw, 17-32 lower jaw).
class ToothClass {
public:
    explicit ToothClass(int index) : index_(index) {
        if (index < 1 || index > kNumToothClasses) {
            throw DomainError("tooth class " + std::to_string(index) + " outside 1..32");
        }
    }

    int index() const noexcept { return index_; }
    /// Row of this class in embedding tables and channel offset minus one in segmentation maps.
    std::size_t row() const noexcept { return static_cast<std::size_t>(index_ - 1); }
    bool upper() const noexcept { return index_ <= 16; }

    auto operator<=>(const ToothClass&) const = default;

private:
    int index_;
};

enum class ToothFamily { incisor, canine, premolar, molar };

inline ToothFamily family_of(ToothClass c) {
    // Position within a jaw, 1 = patient's right third molar ... 16 = left third molar.
    const int pos = c.upper() ? c.index() : 33 - c.index();
    const int mirrored = pos <= 8 ? pos : 17 - pos;  // 1..8 from the back of the arch
    if (mirrored <= 3) return ToothFamily::molar;
    if (mirrored <= 5) return ToothFamily::premolar;
    if (mirrored == 6) return ToothFamily::canine;
    return ToothFamily::incisor;
}

inline const char* family_name(ToothFamily f) {
    switch (f) {
        case ToothFamily::incisor: return "incisor";
        case ToothFamily::canine: return "canine";
        case ToothFamily::premolar: return "premolar";
        case ToothFamily::molar: return "molar";
    }
    return "?";
}

}  // namespace dentocc
