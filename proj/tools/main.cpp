#include "lab.hpp"

int main(int argc, char** argv) { return hitchin::lab::main_entry(argc, argv); }
