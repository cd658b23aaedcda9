#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string_view>
#include <thread>
#include <type_traits>
#include <vector>

namespace shrinker {

/// Worker count: SHRINKER_SPECTRA_THREADS when set to a positive integer,
/// otherwise the hardware concurrency (at least 1).
inline std::size_t thread_cap() {
    if (const char* env = std::getenv("SHRINKER_SPECTRA_THREADS")) {
        const std::string_view text(env);
        unsigned long value = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec == std::errc() && ptr == text.data() + text.size() && value > 0) {
            return value;
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Evaluates f(0), ..., f(count - 1) on up to `threads` workers and returns
/// the results in index order. The first exception by index is rethrown.
template <class F>
auto parallel_map(std::size_t count, F&& f, std::size_t threads = thread_cap())
    -> std::vector<std::invoke_result_t<F&, std::size_t>> {
    using Result = std::invoke_result_t<F&, std::size_t>;
    std::vector<std::optional<Result>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
            try {
                slots[i].emplace(f(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), count);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t t = 0; t < workers; ++t) {
            pool.emplace_back(worker);
        }
    }

    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    std::vector<Result> out;
    out.reserve(count);
    for (auto& s : slots) {
        out.push_back(std::move(*s));
    }
    return out;
}

} // namespace shrinker
