#include "zks/zkp/r1cs.hpp"

#include <algorithm>

#include "zks/common/errors.hpp"

namespace zks::zkp {

LinearCombination LinearCombination::constant(Fp c) {
    LinearCombination lc;
    if (c != Fp::zero()) lc.terms_.push_back({kOneVar, c});
    return lc;
}

LinearCombination& LinearCombination::add(Var v, Fp coeff) {
    if (coeff != Fp::zero()) terms_.push_back({v, coeff});
    return *this;
}

LinearCombination& LinearCombination::add(const LinearCombination& other, Fp scale) {
    for (const auto& t : other.terms_) add(t.var, t.coeff * scale);
    return *this;
}

LinearCombination LinearCombination::operator+(const LinearCombination& o) const {
    LinearCombination r = *this;
    r.add(o);
    return r;
}

LinearCombination LinearCombination::operator-(const LinearCombination& o) const {
    LinearCombination r = *this;
    r.add(o, -Fp::one());
    return r;
}

LinearCombination LinearCombination::operator*(Fp s) const {
    LinearCombination r;
    r.add(*this, s);
    return r;
}

Fp LinearCombination::evaluate(std::span<const Fp> witness) const {
    Fp acc;
    for (const auto& t : terms_) acc += t.coeff * witness[t.var];
    return acc;
}

void LinearCombination::normalize() {
    std::sort(terms_.begin(), terms_.end(), [](const Term& x, const Term& y) { return x.var < y.var; });
    std::vector<Term> merged;
    merged.reserve(terms_.size());
    for (const auto& t : terms_) {
        if (!merged.empty() && merged.back().var == t.var) {
            merged.back().coeff += t.coeff;
        } else {
            merged.push_back(t);
        }
    }
    std::erase_if(merged, [](const Term& t) { return t.coeff == Fp::zero(); });
    terms_ = std::move(merged);
}

std::string_view family_name(Family f) {
    switch (f) {
        case Family::c1: return "C1";
        case Family::c2: return "C2";
        case Family::c3: return "C3";
        case Family::c4: return "C4";
    }
    return "?";
}

bool Constraint::satisfied(std::span<const Fp> witness) const {
    return a.evaluate(witness) * b.evaluate(witness) == c.evaluate(witness);
}

std::optional<std::size_t> ConstraintSystem::first_unsatisfied(std::span<const Fp> witness) const {
    if (witness.size() != num_vars || witness[kOneVar] != Fp::one()) return 0;
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        if (!constraints[i].satisfied(witness)) return i;
    }
    return std::nullopt;
}

FamilyCounts ConstraintSystem::counts() const {
    FamilyCounts out;
    for (const auto& c : constraints) ++out.by_family[static_cast<std::size_t>(c.family)];
    return out;
}

std::vector<std::size_t> ConstraintSystem::binding_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        if (constraints[i].binding) out.push_back(i);
    }
    return out;
}

std::vector<Var> ConstraintSystem::slots_of(std::size_t i) const {
    std::vector<Var> out;
    const auto& c = constraints[i];
    for (const auto* lc : {&c.a, &c.b, &c.c}) {
        for (const auto& t : lc->terms()) out.push_back(t.var);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

CircuitBuilder::CircuitBuilder(bool record) : record_(record) {
    witness_.push_back(Fp::one());
}

Var CircuitBuilder::alloc(Fp value) {
    witness_.push_back(value);
    return static_cast<Var>(witness_.size() - 1);
}

Var CircuitBuilder::alloc_public(Fp value) {
    const Var v = alloc(value);
    if (record_) cs_.public_slots.push_back(v);
    return v;
}

void CircuitBuilder::enforce(LinearCombination a, LinearCombination b, LinearCombination c, Family family,
                             bool binding) {
    ++count_;
    ++counts_.by_family[static_cast<std::size_t>(family)];
    if (!record_) return;
    a.normalize();
    b.normalize();
    c.normalize();
    cs_.constraints.push_back(Constraint{std::move(a), std::move(b), std::move(c), family, binding});
}

void CircuitBuilder::enforce_equal(const LinearCombination& lc, const LinearCombination& target, Family family,
                                   bool binding) {
    enforce(lc, LinearCombination(kOneVar), target, family, binding);
}

Var CircuitBuilder::mul(const LinearCombination& a, const LinearCombination& b, Family family) {
    const Var out = alloc(eval(a) * eval(b));
    enforce(a, b, LinearCombination(out), family);
    return out;
}

Var CircuitBuilder::boolean(bool bit, Family family) {
    const Var v = alloc(bit ? Fp::one() : Fp::zero());
    enforce(LinearCombination(v), LinearCombination(v), LinearCombination(v), family);
    return v;
}

std::vector<Var> CircuitBuilder::range_check(const LinearCombination& lc, unsigned bits, Family family) {
    if (bits == 0 || bits > 62) throw ParameterError("range check width must be in 1..62");
    const std::uint64_t v = eval(lc).value();
    std::vector<Var> out;
    out.reserve(bits);
    LinearCombination recomposed;
    for (unsigned i = 0; i < bits; ++i) {
        // Out-of-range values still get a (wrong) decomposition; the
        // recomposition constraint is then unsatisfied.
        const Var b = boolean(((v >> i) & 1ULL) != 0, family);
        recomposed.add(b, Fp(1ULL << i));
        out.push_back(b);
    }
    enforce_equal(lc, recomposed, family);
    return out;
}

ConstraintSystem CircuitBuilder::take_system() {
    cs_.num_vars = witness_.size();
    return std::move(cs_);
}

}  // namespace zks::zkp
