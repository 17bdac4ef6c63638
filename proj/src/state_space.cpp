#include "fmdp/state_space.hpp"

#include <limits>
#include <sstream>

#include "fmdp/errors.hpp"

namespace fmdp {

StateLayout StateLayout::make(int fault_count, int goal_count, int location_count, int threat_count,
                              int mode_count) {
    std::vector<std::string> errors;
    auto check = [&](const char* name, int v) {
        if (v < 1) errors.push_back(std::string("layout.") + name + ": must be >= 1, got " + std::to_string(v));
    };
    check("fault_count", fault_count);
    check("goal_count", goal_count);
    check("location_count", location_count);
    check("threat_count", threat_count);
    check("mode_count", mode_count);
    if (!errors.empty()) throw ValidationError(std::move(errors));
    return StateLayout(fault_count, goal_count, location_count, threat_count, mode_count);
}

std::vector<std::uint32_t> StateLayout::radices() const {
    std::vector<std::uint32_t> r;
    r.reserve(digit_count());
    r.push_back(static_cast<std::uint32_t>(fault_count_));
    for (int j = 0; j < goal_count_; ++j) r.push_back(kRangeLevels);
    for (int j = 0; j < goal_count_; ++j) r.push_back(kPriorityLevels);
    r.push_back(static_cast<std::uint32_t>(location_count_));
    r.push_back(static_cast<std::uint32_t>(goal_count_ + 1));
    r.push_back(static_cast<std::uint32_t>(threat_count_));
    r.push_back(static_cast<std::uint32_t>(mode_count_));
    return r;
}

MissionState minimal_state(const StateLayout& layout) {
    MissionState s;
    s.range_flags.assign(static_cast<std::size_t>(layout.goal_count()), 0);
    s.goal_priorities.assign(static_cast<std::size_t>(layout.goal_count()), 0);
    return s;
}

BigCount state_count_exact(const StateLayout& layout) {
    const int g = layout.goal_count();
    BigCount goal_part = 1;
    for (int j = 0; j < g; ++j) goal_part *= 6;  // 2^g * 3^g
    goal_part *= (g + 1);
    return BigCount(layout.fault_count()) * goal_part * layout.location_count() * layout.threat_count() *
           layout.mode_count();
}

std::uint64_t state_count(const StateLayout& layout) {
    const BigCount n = state_count_exact(layout);
    if (n > BigCount(std::numeric_limits<std::uint64_t>::max())) {
        throw CapacityError("state count " + n.str() + " does not fit in 64 bits");
    }
    return n.convert_to<std::uint64_t>();
}

std::vector<std::string> validate_state(const MissionState& s, const StateLayout& layout) {
    std::vector<std::string> errors;
    auto range = [&](const std::string& field, long v, long lo, long hi) {
        if (v < lo || v > hi) {
            errors.push_back(field + ": " + std::to_string(v) + " not in [" + std::to_string(lo) + "," +
                             std::to_string(hi) + "]");
        }
    };
    const auto k = static_cast<std::size_t>(layout.goal_count());
    range("fault", s.fault, 1, layout.fault_count());
    if (s.range_flags.size() != k) {
        errors.push_back("range_flags: length " + std::to_string(s.range_flags.size()) + ", expected " +
                         std::to_string(k));
    } else {
        for (std::size_t j = 0; j < k; ++j)
            range("range_flags[" + std::to_string(j) + "]", s.range_flags[j], 0, 1);
    }
    if (s.goal_priorities.size() != k) {
        errors.push_back("goal_priorities: length " + std::to_string(s.goal_priorities.size()) + ", expected " +
                         std::to_string(k));
    } else {
        for (std::size_t j = 0; j < k; ++j)
            range("goal_priorities[" + std::to_string(j) + "]", s.goal_priorities[j], 0, 2);
    }
    range("location", s.location, 0, layout.location_count() - 1);
    range("commitment", s.commitment, 0, layout.goal_count());
    range("threat", s.threat, 0, layout.threat_count() - 1);
    range("nav_mode", s.nav_mode, 0, layout.mode_count() - 1);
    return errors;
}

StateIndex encode_state(const MissionState& s, const StateLayout& layout) {
    auto errors = validate_state(s, layout);
    if (!errors.empty()) throw ValidationError(std::move(errors));

    std::uint64_t idx = static_cast<std::uint64_t>(s.fault - 1);
    auto push = [&idx](std::uint64_t radix, std::uint64_t digit) { idx = idx * radix + digit; };
    for (auto r : s.range_flags) push(2, r);
    for (auto g : s.goal_priorities) push(3, g);
    push(static_cast<std::uint64_t>(layout.location_count()), static_cast<std::uint64_t>(s.location));
    push(static_cast<std::uint64_t>(layout.goal_count() + 1), static_cast<std::uint64_t>(s.commitment));
    push(static_cast<std::uint64_t>(layout.threat_count()), static_cast<std::uint64_t>(s.threat));
    push(static_cast<std::uint64_t>(layout.mode_count()), static_cast<std::uint64_t>(s.nav_mode));
    return StateIndex{idx};
}

void decode_digits(std::uint64_t index, const std::vector<std::uint32_t>& radices,
                   std::vector<std::uint32_t>& digits) {
    digits.resize(radices.size());
    for (std::size_t i = radices.size(); i-- > 0;) {
        digits[i] = static_cast<std::uint32_t>(index % radices[i]);
        index /= radices[i];
    }
}

MissionState decode_state(StateIndex idx, const StateLayout& layout) {
    const std::uint64_t n = state_count(layout);
    if (idx.value >= n) {
        throw BoundsError("state index " + std::to_string(idx.value) + " out of range [0," + std::to_string(n) +
                          ")");
    }
    std::vector<std::uint32_t> d;
    decode_digits(idx.value, layout.radices(), d);

    const auto k = static_cast<std::size_t>(layout.goal_count());
    MissionState s;
    s.fault = static_cast<int>(d[0]) + 1;
    s.range_flags.resize(k);
    s.goal_priorities.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        s.range_flags[j] = static_cast<std::uint8_t>(d[1 + j]);
        s.goal_priorities[j] = static_cast<std::uint8_t>(d[1 + k + j]);
    }
    s.location = static_cast<int>(d[1 + 2 * k]);
    s.commitment = static_cast<int>(d[2 + 2 * k]);
    s.threat = static_cast<int>(d[3 + 2 * k]);
    s.nav_mode = static_cast<int>(d[4 + 2 * k]);
    return s;
}

StateEnumeration::iterator::iterator(const StateLayout* layout, std::uint64_t pos, std::uint64_t end)
    : layout_(layout), pos_(pos), end_(end) {
    load();
}

StateEnumeration::iterator& StateEnumeration::iterator::operator++() {
    ++pos_;
    load();
    return *this;
}

void StateEnumeration::iterator::load() {
    if (layout_ != nullptr && pos_ < end_) current_ = {StateIndex{pos_}, decode_state(StateIndex{pos_}, *layout_)};
}

StateEnumeration::StateEnumeration(StateLayout layout, std::uint64_t cap)
    : layout_(layout), count_(state_count(layout)) {
    if (count_ > cap) {
        throw CapacityError("enumeration of " + std::to_string(count_) + " states exceeds cap " +
                            std::to_string(cap));
    }
}

std::string to_string(const MissionState& s) {
    std::ostringstream os;
    os << '[' << s.fault;
    for (auto r : s.range_flags) os << ' ' << int(r);
    for (auto g : s.goal_priorities) os << ' ' << int(g);
    os << ' ' << s.location << ' ' << s.commitment << ' ' << s.threat << ' ' << s.nav_mode << ']';
    return os.str();
}

}  // namespace fmdp
