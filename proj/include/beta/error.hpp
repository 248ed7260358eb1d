#pragma once

#include <atomic>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace beta {

enum class errc {
    capacity,    // dimension or integer range exceeded
    numeric,     // solver failed to converge, singular input
    domain,      // input outside the operation's domain
    dimension,   // operand shapes disagree
    validation,  // structurally invalid input (duplicates, odd dims, ...)
    degeneracy,  // linearly dependent input where independence is required
    encoding,    // value is not a valid encoding (e.g. not a basis vector)
};

inline const char* to_string(errc code) {
    switch (code) {
        case errc::capacity: return "capacity";
        case errc::numeric: return "numeric";
        case errc::domain: return "domain";
        case errc::dimension: return "dimension";
        case errc::validation: return "validation";
        case errc::degeneracy: return "degeneracy";
        case errc::encoding: return "encoding";
    }
    return "unknown";
}

class error : public std::runtime_error {
public:
    error(errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + " error: " + message), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& message) {
    throw error(code, message);
}

namespace detail {
inline std::atomic<std::size_t>& dim_cap_storage() {
    static std::atomic<std::size_t> cap{4096};
    return cap;
}
}  // namespace detail

/// Largest Hilbert-space dimension any operation will construct.
inline std::size_t dim_cap() { return detail::dim_cap_storage().load(std::memory_order_relaxed); }

inline void set_dim_cap(std::size_t cap) {
    if (cap == 0) fail(errc::domain, "dimension cap must be positive");
    detail::dim_cap_storage().store(cap, std::memory_order_relaxed);
}

inline void check_dim(std::size_t n, const char* what) {
    if (n == 0) fail(errc::domain, std::string(what) + ": dimension must be positive");
    if (n > dim_cap())
        fail(errc::capacity, std::string(what) + ": dimension " + std::to_string(n) +
                                 " exceeds cap " + std::to_string(dim_cap()));
}

}  // namespace beta
