package a;

public class Alpha {
    int count;
    void inc() {
        if (count > 3) {
            count = 0;
        }
        count++;
    }
}
