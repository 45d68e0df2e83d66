#include "awbem/solver.hpp"
int main() { return 0; }
