#include "acol/threading.hpp"

#include <omp.h>

#include <cstdlib>
#include <mutex>

extern "C" void openblas_set_num_threads(int);

namespace acol {

namespace {
int g_threads = 1;
std::once_flag g_blas_once;
}  // namespace

void set_thread_count(int threads) {
    if (threads < 1) threads = 1;
    g_threads = threads;
    omp_set_num_threads(threads);
    ensure_blas_single_threaded();
}

int thread_count() { return g_threads; }

void init_threading_from_env() {
    int threads = 1;
    if (const char* env = std::getenv("ACOL_THREADS")) {
        threads = std::atoi(env);
        if (threads < 1) threads = 1;
    }
    set_thread_count(threads);
}

void ensure_blas_single_threaded() {
    std::call_once(g_blas_once, [] { openblas_set_num_threads(1); });
}

}  // namespace acol
