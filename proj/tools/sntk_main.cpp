#include <cstdio>

int main() {
    std::puts("sntk: placeholder");
    return 0;
}
