#include "privlens/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace privlens {
namespace {

std::atomic<int> g_override{0};

int environment_budget() {
  static const int budget = [] {
    if (const char* env = std::getenv("PRIVLENS_THREADS")) {
      try {
        const int n = std::stoi(env);
        if (n >= 1) {
          return n;
        }
      } catch (const std::exception&) {
      }
    }
    return static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  }();
  return budget;
}

}  // namespace

int thread_budget() {
  const int forced = g_override.load();
  return forced > 0 ? forced : environment_budget();
}

void set_thread_budget(int threads) { g_override.store(threads > 0 ? threads : 0); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(thread_budget()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      body(i);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) {
    pool.emplace_back(work);
  }
  work();
  pool.clear();
  if (failure) {
    std::rethrow_exception(failure);
  }
}

}  // namespace privlens
