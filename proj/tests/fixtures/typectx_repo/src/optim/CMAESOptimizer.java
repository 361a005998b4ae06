package optim;

import java.util.ArrayList;
import java.util.List;
import linear.Array2DRowRealMatrix;
import linear.RealMatrix;

/**
 * Covariance matrix adaptation search.
 */
public class CMAESOptimizer {
    private final int dimension;
    private List<Double> fitnessHistory = new ArrayList<>();
    private RealMatrix covariance;

    public CMAESOptimizer(int dimension) {
        this.dimension = dimension;
        this.covariance = new Array2DRowRealMatrix(dimension, dimension);
    }

    public double[] optimize(double[] start) {
        double[] best = start.clone();
        for (int i = 0; i < dimension; i++) {
            best[i] += covariance.getEntry(i, i);
        }
        fitnessHistory.add(best[0]);
        return best;
    }

    /**
     * Upper triangular part of a matrix, shifted by k diagonals.
     */
    private static RealMatrix triu(final RealMatrix m, int k) {
        final double[][] d = new double[m.getRowDimension()][m.getColumnDimension()];
        for (int r = 0; r < m.getRowDimension(); r++) {
            for (int c = 0; c < m.getColumnDimension(); c++) {
                d[r][c] = r <= c - k ? m.getEntry(r, c) : 0;
            }
        }
        return new Array2DRowRealMatrix(d, false);
    }
}
