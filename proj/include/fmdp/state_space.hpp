#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace fmdp {

using BigCount = boost::multiprecision::cpp_int;

/// Cardinalities of every factor of the mission state. Range flags are
/// binary, goal priorities take three levels and the commitment digit has
/// one level per goal plus "uncommitted".
class StateLayout {
public:
    static constexpr int kRangeLevels = 2;
    static constexpr int kPriorityLevels = 3;

    /// Throws ValidationError if any count is < 1.
    static StateLayout make(int fault_count, int goal_count, int location_count, int threat_count,
                            int mode_count);

    int fault_count() const noexcept { return fault_count_; }
    int goal_count() const noexcept { return goal_count_; }
    int location_count() const noexcept { return location_count_; }
    int threat_count() const noexcept { return threat_count_; }
    int mode_count() const noexcept { return mode_count_; }
    int range_levels() const noexcept { return kRangeLevels; }
    int priority_levels() const noexcept { return kPriorityLevels; }
    int commitment_levels() const noexcept { return goal_count_ + 1; }

    /// Digit radices, most significant first:
    /// [fault, r_1..r_k, g_1..g_k, location, commitment, threat, mode].
    std::vector<std::uint32_t> radices() const;
    std::size_t digit_count() const noexcept { return 5 + 2 * static_cast<std::size_t>(goal_count_); }

    // Digit positions inside radices().
    std::size_t fault_digit() const noexcept { return 0; }
    std::size_t range_digit(int goal) const noexcept { return 1 + static_cast<std::size_t>(goal); }
    std::size_t priority_digit(int goal) const noexcept {
        return 1 + static_cast<std::size_t>(goal_count_ + goal);
    }
    std::size_t location_digit() const noexcept { return 1 + 2 * static_cast<std::size_t>(goal_count_); }
    std::size_t commitment_digit() const noexcept { return location_digit() + 1; }
    std::size_t threat_digit() const noexcept { return location_digit() + 2; }
    std::size_t mode_digit() const noexcept { return location_digit() + 3; }

    friend bool operator==(const StateLayout&, const StateLayout&) = default;

private:
    StateLayout(int f, int g, int l, int t, int m)
        : fault_count_(f), goal_count_(g), location_count_(l), threat_count_(t), mode_count_(m) {}

    int fault_count_;
    int goal_count_;
    int location_count_;
    int threat_count_;
    int mode_count_;
};

/// One factored mission state. Fault modes are 1-based, everything else 0-based.
struct MissionState {
    int fault = 1;
    std::vector<std::uint8_t> range_flags;
    std::vector<std::uint8_t> goal_priorities;
    int location = 0;
    int commitment = 0;
    int threat = 0;
    int nav_mode = 0;

    friend bool operator==(const MissionState&, const MissionState&) = default;
};

/// All-minimal state for a layout (healthy, out of range, no goals, cell 0).
MissionState minimal_state(const StateLayout& layout);

struct StateIndex {
    std::uint64_t value = 0;
    friend auto operator<=>(const StateIndex&, const StateIndex&) = default;
};

/// f_s * (2^g * 3^g * (g+1)) * l_s * t_s * m_s, exact for any goal count.
BigCount state_count_exact(const StateLayout& layout);

/// Same count as a machine integer. Throws CapacityError when it does not
/// fit in 64 bits.
std::uint64_t state_count(const StateLayout& layout);

/// Lists every out-of-range field of `s`, e.g. "goal_priorities[1]: 3 not in [0,2]".
std::vector<std::string> validate_state(const MissionState& s, const StateLayout& layout);

/// Mixed-radix index of `s`. Throws ValidationError naming the offending field.
StateIndex encode_state(const MissionState& s, const StateLayout& layout);

/// Inverse of encode_state. Throws BoundsError when idx >= state_count.
MissionState decode_state(StateIndex idx, const StateLayout& layout);

/// Splits an index into its digits (most significant first) without
/// building a MissionState.
void decode_digits(std::uint64_t index, const std::vector<std::uint32_t>& radices,
                   std::vector<std::uint32_t>& digits);

/// Input range over (StateIndex, MissionState) in index order.
class StateEnumeration {
public:
    static constexpr std::uint64_t kDefaultCap = 50'000'000;

    class iterator {
    public:
        using iterator_category = std::input_iterator_tag;
        using value_type = std::pair<StateIndex, MissionState>;
        using difference_type = std::ptrdiff_t;
        using pointer = const value_type*;
        using reference = const value_type&;

        iterator() = default;
        iterator(const StateLayout* layout, std::uint64_t pos, std::uint64_t end);

        reference operator*() const { return current_; }
        pointer operator->() const { return &current_; }
        iterator& operator++();
        iterator operator++(int) {
            auto copy = *this;
            ++*this;
            return copy;
        }
        friend bool operator==(const iterator& a, const iterator& b) { return a.pos_ == b.pos_; }

    private:
        void load();

        const StateLayout* layout_ = nullptr;
        std::uint64_t pos_ = 0;
        std::uint64_t end_ = 0;
        value_type current_;
    };

    /// Throws CapacityError when the layout has more than `cap` states.
    explicit StateEnumeration(StateLayout layout, std::uint64_t cap = kDefaultCap);

    iterator begin() const { return iterator(&layout_, 0, count_); }
    iterator end() const { return iterator(&layout_, count_, count_); }
    std::uint64_t size() const noexcept { return count_; }

private:
    StateLayout layout_;
    std::uint64_t count_;
};

inline StateEnumeration enumerate_states(const StateLayout& layout,
                                         std::uint64_t cap = StateEnumeration::kDefaultCap) {
    return StateEnumeration(layout, cap);
}

/// "[f r1..rk g1..gk l c t m]" with the fault printed 1-based.
std::string to_string(const MissionState& s);

}  // namespace fmdp
