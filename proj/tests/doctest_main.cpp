#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "hierspec/linalg.hpp"

int main(int argc, char** argv) {
    hierspec::ensure_blas_kernel(argv);
    return doctest::Context(argc, argv).run();
}
