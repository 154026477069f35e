#include "dvars/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace dvars {

unsigned default_worker_count() {
    if (const char* env = std::getenv("DVARS_THREADS"); env != nullptr && *env != '\0') {
        try {
            const long n = std::stol(env);
            if (n >= 1) return static_cast<unsigned>(std::min<long>(n, 1024));
        } catch (const std::exception&) {
            // fall through to the hardware default
        }
    }
    return std::max(1U, std::thread::hardware_concurrency());
}

unsigned resolve_workers(unsigned requested) {
    return requested == 0 ? default_worker_count() : requested;
}

void parallel_for(std::size_t tasks, unsigned workers, const std::function<void(std::size_t)>& body) {
    const auto n_threads = static_cast<std::size_t>(std::min<std::size_t>(resolve_workers(workers), tasks));
    if (n_threads <= 1) {
        for (std::size_t t = 0; t < tasks; ++t) body(t);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto run = [&] {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks) return;
            try {
                body(t);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(tasks);
                return;
            }
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(n_threads - 1);
    for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(run);
    run();
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace dvars
