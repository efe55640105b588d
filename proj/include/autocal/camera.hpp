#pragma once

#include <array>
#include <cmath>
#include <string>

#include "autocal/common.hpp"

#include <json.hpp>

namespace autocal {

// Calibration matrix entries: K = [f s u; 0 g v; 0 0 1].
struct Intrinsics {
    double f = 1.0;
    double g = 1.0;
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
};

inline Mat3 build_k(const Intrinsics& intr) {
    if (intr.f == 0.0 || intr.g == 0.0) throw ZeroFocal("build_k: zero focal length");
    Mat3 k;
    k << intr.f, intr.s, intr.u, 0.0, intr.g, intr.v, 0.0, 0.0, 1.0;
    return k;
}

// Closed-form inverse of an upper-triangular K with unit (3,3) entry.
inline Mat3 k_inverse(const Intrinsics& intr) {
    if (intr.f == 0.0 || intr.g == 0.0) throw ZeroFocal("k_inverse: zero focal length");
    const double f = intr.f, g = intr.g, u = intr.u, v = intr.v, s = intr.s;
    Mat3 inv;
    inv << 1.0 / f, -s / (f * g), (s * v - u * g) / (f * g),
           0.0,     1.0 / g,      -v / g,
           0.0,     0.0,          1.0;
    return inv;
}

// Image of the absolute conic, omega = K^{-T} K^{-1}.
inline Mat3 omega_direct(const Intrinsics& intr) {
    const Mat3 inv = k_inverse(intr);
    return inv.transpose() * inv;
}

// Change of variables removing the f -> -f and (g,s) -> (-g,-s) symmetries:
// f_star = f^2, g_star = g^2, s_star = s/g.
struct OmegaParams {
    double f_star = 1.0;
    double g_star = 1.0;
    double s_star = 0.0;
    double u = 0.0;
    double v = 0.0;
};

inline OmegaParams omega_params_of(const Intrinsics& intr) {
    if (intr.f == 0.0 || intr.g == 0.0) throw ZeroFocal("omega_params_of: zero focal length");
    return {intr.f * intr.f, intr.g * intr.g, intr.s / intr.g, intr.u, intr.v};
}

// omega in terms of (f_star, g_star, s_star, u, v). Expansion of the direct
// product K^{-T} K^{-1}, which is the normative definition.
inline Mat3 omega_from_params(const OmegaParams& p) {
    if (p.f_star == 0.0 || p.g_star == 0.0)
        throw ZeroFocalSquare("omega_from_params: zero f_star or g_star");
    const double fs = p.f_star, gs = p.g_star, ss = p.s_star, u = p.u, v = p.v;
    const double w = u - ss * v;
    Mat3 o;
    o(0, 0) = 1.0 / fs;
    o(0, 1) = o(1, 0) = -ss / fs;
    o(0, 2) = o(2, 0) = -w / fs;
    o(1, 1) = 1.0 / gs + ss * ss / fs;
    o(1, 2) = o(2, 1) = ss * w / fs - v / gs;
    o(2, 2) = 1.0 + v * v / gs + w * w / fs;
    return o;
}

// The four sign-symmetric preimages of a parameter point, physical one first.
inline std::array<Intrinsics, 4> k_candidates(const OmegaParams& p) {
    if (p.f_star <= 0.0 || p.g_star <= 0.0)
        throw NegativeSquare("k_candidates: f_star and g_star must be positive for real K");
    const double f = std::sqrt(p.f_star);
    const double g = std::sqrt(p.g_star);
    std::array<Intrinsics, 4> out;
    int idx = 0;
    for (const double sf : {1.0, -1.0})
        for (const double sg : {1.0, -1.0})
            out[idx++] = Intrinsics{sf * f, sg * g, p.u, p.v, p.s_star * sg * g};
    return out;
}

enum class SlotKind { Unknown, Known, TiedToF };

struct Slot {
    SlotKind kind = SlotKind::Unknown;
    double value = 0.0;

    static Slot unknown() { return {SlotKind::Unknown, 0.0}; }
    static Slot known(double v) { return {SlotKind::Known, v}; }
    static Slot tied() { return {SlotKind::TiedToF, 0.0}; }
};

// Knowledge about the five intrinsics, mirroring the fguvs mask notation.
// Slot order: f, g, u, v, s. The tied slot expresses square pixels (g = f)
// and is only legal in the g position.
struct IntrinsicsSpec {
    std::array<Slot, 5> slots{};

    IntrinsicsSpec() {
        for (auto& s : slots) s = Slot::unknown();
    }

    const Slot& f() const { return slots[0]; }
    const Slot& g() const { return slots[1]; }
    const Slot& u() const { return slots[2]; }
    const Slot& v() const { return slots[3]; }
    const Slot& s() const { return slots[4]; }

    int linear_constraints() const {
        int l = 0;
        for (const auto& s : slots)
            if (s.kind != SlotKind::Unknown) ++l;
        return l;
    }

    bool valid() const {
        for (int i = 0; i < 5; ++i)
            if (slots[i].kind == SlotKind::TiedToF && i != 1) return false;
        return true;
    }

    // Number of unknown omega parameters (tied g shares f_star's unknown).
    int omega_unknown_count() const {
        int n = 0;
        if (slots[0].kind == SlotKind::Unknown) ++n;                  // f_star
        if (slots[1].kind == SlotKind::Unknown) ++n;                  // g_star
        if (slots[4].kind == SlotKind::Unknown) ++n;                  // s_star
        if (slots[2].kind == SlotKind::Unknown) ++n;                  // u
        if (slots[3].kind == SlotKind::Unknown) ++n;                  // v
        return n;
    }

    // True g value when the slot is Known or TiedToF with known f.
    bool g_value(double* out) const {
        if (slots[1].kind == SlotKind::Known) {
            *out = slots[1].value;
            return true;
        }
        if (slots[1].kind == SlotKind::TiedToF && slots[0].kind == SlotKind::Known) {
            *out = slots[0].value;
            return true;
        }
        return false;
    }

    std::string mask_string() const {
        const char letters[5] = {'f', 'g', 'u', 'v', 's'};
        std::string m;
        for (int i = 0; i < 5; ++i) {
            switch (slots[i].kind) {
                case SlotKind::Unknown: m += letters[i]; break;
                case SlotKind::TiedToF: m += 'f'; break;
                case SlotKind::Known: {
                    const double val = slots[i].value;
                    if (val == 0.0) m += '0';
                    else if (val == 1.0) m += '1';
                    else m += 'k';
                    break;
                }
            }
        }
        return m;
    }
};

// Parses masks like "fguvs", "fguv0", "ffuv0", "11000", "f1uv0".
inline IntrinsicsSpec parse_mask(const std::string& mask) {
    if (mask.size() != 5) throw Error("parse_mask: mask must have 5 characters");
    const char letters[5] = {'f', 'g', 'u', 'v', 's'};
    IntrinsicsSpec spec;
    for (int i = 0; i < 5; ++i) {
        const char c = mask[i];
        if (c == letters[i]) {
            spec.slots[i] = Slot::unknown();
        } else if (i == 1 && c == 'f') {
            spec.slots[i] = Slot::tied();
        } else if (c >= '0' && c <= '9') {
            spec.slots[i] = Slot::known(static_cast<double>(c - '0'));
        } else {
            throw Error("parse_mask: bad character '" + std::string(1, c) + "'");
        }
    }
    if (!spec.valid()) throw Error("parse_mask: tied-to-f only legal in the g slot");
    return spec;
}

// Same unknown pattern, with known slot values taken from intr.
inline IntrinsicsSpec spec_with_values(const IntrinsicsSpec& pattern, const Intrinsics& intr) {
    IntrinsicsSpec spec = pattern;
    const double vals[5] = {intr.f, intr.g, intr.u, intr.v, intr.s};
    for (int i = 0; i < 5; ++i)
        if (spec.slots[i].kind == SlotKind::Known) spec.slots[i].value = vals[i];
    return spec;
}

// A spec whose known slots carry normalized values (f=g=1, u=v=s=0).
inline IntrinsicsSpec normalized_spec(const IntrinsicsSpec& spec) {
    IntrinsicsSpec out = spec;
    for (int i = 0; i < 5; ++i)
        if (out.slots[i].kind == SlotKind::Known) out.slots[i].value = (i < 2) ? 1.0 : 0.0;
    return out;
}

// Pixel-coordinate normalization x' = S * H * T * x mirroring the
// translation-shear-scaling decomposition of K. Applying the record to
// observations of a camera K yields observations of K' = S H T K, and
// denormalize composes the inverse back.
struct NormalizationRecord {
    double t1 = 0.0, t2 = 0.0;  // translation removed (known principal point)
    double sigma = 0.0;         // shear removed (known s_star)
    double a = 1.0, b = 1.0;    // scales removed (known focals)

    bool is_identity() const {
        return t1 == 0.0 && t2 == 0.0 && sigma == 0.0 && a == 1.0 && b == 1.0;
    }

    Vec2 apply(const Vec2& x) const {
        const double y2 = x[1] - t2;
        const double y1 = (x[0] - t1) - sigma * y2;
        return {y1 / a, y2 / b};
    }

    Vec2 unapply(const Vec2& x) const {
        const double y1 = x[0] * a;
        const double y2 = x[1] * b;
        return {y1 + sigma * y2 + t1, y2 + t2};
    }

    // K' = (S H T) K for ground-truth bookkeeping in tests and seeding.
    Intrinsics normalize_intrinsics(const Intrinsics& k) const {
        Intrinsics out;
        out.f = k.f / a;
        out.g = k.g / b;
        out.s = (k.s - sigma * k.g) / a;
        out.u = (k.u - t1 - sigma * (k.v - t2)) / a;
        out.v = (k.v - t2) / b;
        return out;
    }
};

// K = T H S K' recovers the original intrinsics from an estimate made in
// normalized coordinates.
inline Intrinsics denormalize_intrinsics(const Intrinsics& est, const NormalizationRecord& rec) {
    Intrinsics out;
    out.f = rec.a * est.f;
    out.g = rec.b * est.g;
    out.s = rec.a * est.s + rec.sigma * rec.b * est.g;
    out.u = rec.a * est.u + rec.sigma * rec.b * est.v + rec.t1;
    out.v = rec.b * est.v + rec.t2;
    return out;
}

// Builds the record implied by the known slots of a spec. With
// prescale_unknowns, unknown translation/scale slots fall back to the image
// center and mean image dimension so downstream solves run at O(1) magnitudes;
// the record makes that choice invertible.
inline NormalizationRecord make_normalization_record(const IntrinsicsSpec& spec, double width,
                                                     double height,
                                                     bool prescale_unknowns = false) {
    NormalizationRecord rec;
    const bool u_known = spec.u().kind == SlotKind::Known;
    const bool v_known = spec.v().kind == SlotKind::Known;
    const bool s_known = spec.s().kind == SlotKind::Known;
    const bool f_known = spec.f().kind == SlotKind::Known;

    rec.t1 = u_known ? spec.u().value : (prescale_unknowns ? width / 2.0 : 0.0);
    rec.t2 = v_known ? spec.v().value : (prescale_unknowns ? height / 2.0 : 0.0);

    if (s_known && spec.s().value != 0.0) {
        double g = 0.0;
        if (!spec.g_value(&g) || !v_known)
            throw ShearWithoutV("shear removal needs known g and known v");
        rec.sigma = spec.s().value / g;
    }

    const double iso = prescale_unknowns ? (width + height) / 2.0 : 1.0;
    rec.a = f_known ? spec.f().value : iso;
    double g = 0.0;
    if (spec.g_value(&g)) {
        rec.b = g;
    } else if (spec.g().kind == SlotKind::TiedToF) {
        rec.b = rec.a;  // keep the square-pixel tie intact
    } else {
        rec.b = iso;
    }
    if (rec.a == 0.0 || rec.b == 0.0) throw ZeroFocal("normalization scale must be nonzero");
    return rec;
}

// --- JSON ---

inline nlohmann::json to_json(const Intrinsics& k) {
    return {{"f", k.f}, {"g", k.g}, {"u", k.u}, {"v", k.v}, {"s", k.s}};
}

inline Intrinsics intrinsics_from_json(const nlohmann::json& j) {
    return {j.at("f").get<double>(), j.at("g").get<double>(), j.at("u").get<double>(),
            j.at("v").get<double>(), j.at("s").get<double>()};
}

inline nlohmann::json to_json(const IntrinsicsSpec& spec) {
    nlohmann::json mask = nlohmann::json::array();
    for (const auto& slot : spec.slots) {
        switch (slot.kind) {
            case SlotKind::Unknown: mask.push_back("unknown"); break;
            case SlotKind::Known: mask.push_back({{"known", slot.value}}); break;
            case SlotKind::TiedToF: mask.push_back("tied-to-f"); break;
        }
    }
    return {{"mask", mask}};
}

inline IntrinsicsSpec spec_from_json(const nlohmann::json& j) {
    IntrinsicsSpec spec;
    const auto& mask = j.at("mask");
    if (mask.size() != 5) throw Error("spec_from_json: mask must have 5 entries");
    for (int i = 0; i < 5; ++i) {
        const auto& e = mask[i];
        if (e.is_string()) {
            const std::string s = e.get<std::string>();
            if (s == "unknown") spec.slots[i] = Slot::unknown();
            else if (s == "tied-to-f") spec.slots[i] = Slot::tied();
            else throw Error("spec_from_json: bad mask entry " + s);
        } else {
            spec.slots[i] = Slot::known(e.at("known").get<double>());
        }
    }
    if (!spec.valid()) throw Error("spec_from_json: tied-to-f only legal in the g slot");
    return spec;
}

inline nlohmann::json to_json(const NormalizationRecord& rec) {
    return {{"t1", rec.t1}, {"t2", rec.t2}, {"sigma", rec.sigma}, {"a", rec.a}, {"b", rec.b}};
}

inline NormalizationRecord normalization_record_from_json(const nlohmann::json& j) {
    NormalizationRecord rec;
    rec.t1 = j.at("t1").get<double>();
    rec.t2 = j.at("t2").get<double>();
    rec.sigma = j.at("sigma").get<double>();
    rec.a = j.at("a").get<double>();
    rec.b = j.at("b").get<double>();
    return rec;
}

}  // namespace autocal
