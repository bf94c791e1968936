package controllers

import (
	"context"

	metav1 "k8s.io/apimachinery/pkg/apis/meta/v1"
	ctrl "sigs.k8s.io/controller-runtime"
	"sigs.k8s.io/controller-runtime/pkg/client"
)

// BackupReconciler registers a BackupStore for every Backup.
type BackupReconciler struct {
	client.Client
}

// Reconcile creates the cluster-scoped store described by a namespaced Backup.
func (r *BackupReconciler) Reconcile(ctx context.Context, req ctrl.Request) (ctrl.Result, error) {
	backup := &Backup{}
	if err := r.Get(ctx, req.NamespacedName, backup); err != nil {
		return ctrl.Result{}, err
	}

	store := &BackupStore{
		ObjectMeta: metav1.ObjectMeta{Name: backup.Spec.StoreName},
		Spec:       BackupStoreSpec{Bucket: backup.Spec.Bucket},
	}
	if err := r.Create(ctx, store); err != nil {
		return ctrl.Result{}, err
	}
	return ctrl.Result{}, nil
}
