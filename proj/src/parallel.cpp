#include "semigroup/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace semigroup {

namespace {
std::atomic<int> g_workers{0};
}

void set_worker_count(int workers)
{
  g_workers.store(std::max(0, workers));
}

int worker_count()
{
  const int requested = g_workers.load();
  if (requested > 0)
    return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_chunks(std::size_t chunks, const std::function<void(std::size_t, int)>& fn)
{
  const int workers = static_cast<int>(std::min<std::size_t>(worker_count(), chunks));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c)
      fn(c, 0);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&](int worker) {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks)
        return;
      try {
        fn(c, worker);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error)
          error = std::current_exception();
        next.store(chunks);
        return;
      }
    }
  };

  std::vector<std::jthread> threads;
  threads.reserve(workers - 1);
  for (int w = 1; w < workers; ++w)
    threads.emplace_back(body, w);
  body(0);
  threads.clear();
  if (error)
    std::rethrow_exception(error);
}

} // namespace semigroup
