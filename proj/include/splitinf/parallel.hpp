#pragma once

#include <cstdint>
#include <exception>
#include <mutex>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace splitinf {

// Every kernel that loops over independent tasks takes one of these. The
// serial path is the reference implementation; both must produce identical
// bits because each task draws from its own derived RNG stream.
enum class Exec { serial, parallel };

void set_num_threads(int threads);
int max_threads();

// True while executing inside an OpenMP parallel region; kernels drop to
// serial there instead of nesting.
bool in_parallel_region();

namespace detail {

class FirstError {
public:
    void record(std::int64_t index, std::exception_ptr error) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (!error_ || index < index_) {
            index_ = index;
            error_ = error;
        }
    }
    void rethrow() const {
        if (error_) std::rethrow_exception(error_);
    }

private:
    std::mutex mutex_;
    std::int64_t index_ = 0;
    std::exception_ptr error_;
};

} // namespace detail

/// Runs body(i) for i in [0, count). With Exec::parallel the iterations are
/// distributed with a static schedule. If any iteration throws, the exception
/// of the lowest failing index is rethrown after the loop, so the reported
/// error does not depend on the thread count.
template <typename Body>
void for_each_index(Exec exec, std::int64_t count, Body&& body) {
    detail::FirstError errors;
    const bool go_parallel = exec == Exec::parallel && !in_parallel_region() && count > 1;
    if (!go_parallel) {
        for (std::int64_t i = 0; i < count; ++i) {
            try {
                body(i);
            } catch (...) {
                errors.record(i, std::current_exception());
                break;
            }
        }
        errors.rethrow();
        return;
    }
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            body(i);
        } catch (...) {
            errors.record(i, std::current_exception());
        }
    }
    errors.rethrow();
}

} // namespace splitinf
