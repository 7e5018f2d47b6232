#include "lagfield/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace lagfield {

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    const int workers = std::min(std::max(threads, 1), std::max(count, 1));
    if (workers <= 1) {
        for (int k = 0; k < count; ++k) body(k);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int k = w; k < count; k += workers) body(k);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace lagfield
