int x; //@ strong global invariant x == 0 || x == 1;
int id_set_x(int val)
/*@ requires val == 1; ensures \result == 1; @*/ {
  x=1; return val;
}
int main(void)
/*@ ensures \result == 1 || \result == 2; @*/ {
  x=0; return x + id_set_x(1);
}
