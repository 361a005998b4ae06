package linear;

public interface RealVector {
    int getDimension();

    double getEntry(int index);
}
